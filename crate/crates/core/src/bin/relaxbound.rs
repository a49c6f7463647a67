fn main() -> std::process::ExitCode {
    relaxbound::cli::main()
}
