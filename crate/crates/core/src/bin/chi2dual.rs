fn main() {
    let code = chi2dual::cli::main_with_args(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
