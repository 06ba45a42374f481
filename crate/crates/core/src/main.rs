fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let mut out = String::new();
    let code = stgroup::cli::run(&argv, &mut out);
    if code == stgroup::cli::EXIT_USAGE {
        eprint!("{out}");
    } else {
        print!("{out}");
    }
    std::process::exit(code);
}
