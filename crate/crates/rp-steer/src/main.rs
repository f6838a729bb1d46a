fn main() {
    std::process::exit(rp_steer::cli::run());
}
