fn main() {
    std::process::exit(bilevel::cli::cli_main(std::env::args_os()));
}
