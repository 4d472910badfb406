fn main() {
    std::process::exit(snapreg::cli::cli_main(std::env::args_os()));
}
