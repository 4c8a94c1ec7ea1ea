fn main() -> std::process::ExitCode {
    rrsens::cli::run()
}
