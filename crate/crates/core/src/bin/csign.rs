fn main() -> std::process::ExitCode {
    csign::cli::main()
}
