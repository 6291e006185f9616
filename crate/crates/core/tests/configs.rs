use docclass::experiment::{Architecture, ExperimentSpec};

#[test]
fn shipped_configs_are_valid() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let spec =
                ExperimentSpec::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let grid = spec.expand_sweep();
            assert!(!grid.is_empty());
            for (_, point) in grid {
                point.validate().unwrap();
            }
            seen += 1;
        }
    }
    assert!(seen >= 9);
}

#[test]
fn sweep_configs_cover_their_grids() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dict = ExperimentSpec::load(dir.join("sweep_dict_size.json")).unwrap();
    assert_eq!(dict.architecture, Architecture::Fdnn);
    assert_eq!(dict.expand_sweep().len(), 7);
    let grid = ExperimentSpec::load(dir.join("sweep_cnn_grid.json")).unwrap();
    assert_eq!(grid.expand_sweep().len(), 12);
}
