fn main() -> std::process::ExitCode {
    hidam::cli::main()
}
