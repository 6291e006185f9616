"""Smoke test for the pydocclass extension module.

Build and install first, e.g.:

    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/pydocclass-*.whl

then run `python python/smoke_test.py`.
"""

import json
import pathlib
import tempfile

import pydocclass as dc


def main() -> None:
    assert dc.tokenize("Praha, 12.5 Mil. lidí!") == ["praha", "<num>", "mil", "lidí"]

    p, r, f1, counts = dc.micro_prf([[0], [0, 1]], [[0], [1]], 2)
    assert counts[:3] == (2, 1, 0) and abs(f1 - 0.8) < 1e-12, (p, r, f1, counts)

    scores = [[0.9, 0.1], [0.2, 0.8]]
    gold = [[0], [1]]
    best_tau, best_f1, table = dc.sweep_threshold(scores, gold)
    assert best_f1 == 1.0 and len(table) == 101
    roc = dc.roc_curve(scores, gold)
    assert roc[0][1:] == (1.0, 1.0) and roc[-1][1:] == (0.0, 0.0)
    assert dc.decide_labels([0.2, 0.7], 0.5) == {1}

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        corpus = tmp / "corpus.jsonl"
        assert dc.write_synthetic_corpus(str(corpus), n_docs=300) == 300

        texts = [json.loads(line)["text"] for line in corpus.read_text().splitlines()]
        d = dc.Dictionary.build(texts, 100)
        assert len(d) == 100 and d.oov_index == 100 and d.pad_index == 101
        assert len(d.vectorize_sequence(texts[0], 16)) == 16

        spec = tmp / "spec.json"
        spec.write_text(json.dumps({
            "name": "smoke",
            "corpus": "corpus.jsonl",
            "architecture": "cnn",
            "dict_size": 1000,
            "top_n": 10,
            "cnn": {"seq_len": 32, "emb_dim": 8, "n_kernels": 4, "kernel_width": 3,
                    "output_activation": "sigmoid"},
            "train": {"lr": 0.003, "max_epochs": 3, "patience": 2},
        }))
        run = pathlib.Path(dc.run_cli(["train", "--spec", str(spec), "--out", str(tmp / "runs"),
                                       "--run-name", "t"]))
        clf = dc.Classifier.load(str(run / "checkpoint.json"), str(run / "dictionary.txt"))
        assert clf.architecture == "cnn" and len(clf.labels) == 10
        assert len(clf.scores(texts[0])) == 10
        clf.tau = 1.0
        assert clf.predict(texts[0]) == []

        d.save(str(tmp / "other.txt"))
        try:
            dc.Classifier.load(str(run / "checkpoint.json"), str(tmp / "other.txt"))
        except ValueError as e:
            assert "integrity" in str(e)
        else:
            raise AssertionError("mismatched dictionary accepted")

    print(f"pydocclass {dc.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
