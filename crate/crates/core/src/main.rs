fn main() {
    std::process::exit(ncwss::harness::cli_main(std::env::args_os()));
}
