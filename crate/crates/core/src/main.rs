fn main() -> std::process::ExitCode {
    docclass::cli::run()
}
