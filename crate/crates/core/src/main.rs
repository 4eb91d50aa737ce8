fn main() -> std::process::ExitCode {
    nullgeom::cli::run()
}
