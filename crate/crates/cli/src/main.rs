fn main() {
    std::process::exit(geogrid_cli::run(std::env::args_os()));
}
