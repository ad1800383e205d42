fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(gmac::cli::run(&argv));
}
