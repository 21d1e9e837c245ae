fn main() -> std::process::ExitCode {
    taxowl::cli::main()
}
