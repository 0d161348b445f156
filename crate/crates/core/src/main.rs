fn main() {
    std::process::exit(fracwave::harness::cli_main(std::env::args_os()));
}
