fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(sparrownet::cli::run_from_args(&args));
}
