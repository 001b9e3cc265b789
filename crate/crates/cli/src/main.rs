fn main() {
    std::process::exit(lumisphere_harness::commands::run(std::env::args_os()));
}
