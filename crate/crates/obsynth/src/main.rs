fn main() -> std::process::ExitCode {
    obsynth::cli::main()
}
