fn main() {
    std::process::exit(vssea::cli::run_cli());
}
