fn main() {
    std::process::exit(uigc::cli::cli_main(std::env::args_os()));
}
