fn main() {
    std::process::exit(lanemix::cli::run());
}
