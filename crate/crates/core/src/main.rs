fn main() -> std::process::ExitCode {
    factorlab::cli::main()
}
