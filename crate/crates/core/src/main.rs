fn main() -> std::process::ExitCode {
    sjfa::cli::main()
}
