fn main() {
    std::process::exit(dlamap::cli::cli_run(std::env::args_os()));
}
