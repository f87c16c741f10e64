fn main() {
    std::process::exit(binquant::cli::run(std::env::args_os()));
}
