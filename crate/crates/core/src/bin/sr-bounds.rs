fn main() {
    std::process::exit(sr_bounds::harness::cli::cli_main());
}
