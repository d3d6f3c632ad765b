fn main() { std::process::exit(mamorl::harness::cli(std::env::args().collect())); }
