fn main() {
    let code = corridor_cli::main_with(
        std::env::args_os(),
        |k| std::env::var(k).ok(),
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    std::process::exit(code);
}
