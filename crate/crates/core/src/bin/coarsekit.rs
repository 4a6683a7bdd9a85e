fn main() {
    std::process::exit(coarsekit::cli::dispatch(std::env::args()));
}
