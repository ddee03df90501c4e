fn main() {
    std::process::exit(damwave::cli::cli_main(std::env::args_os()));
}
