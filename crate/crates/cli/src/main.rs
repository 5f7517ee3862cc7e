use std::io;

fn main() {
    let code = gaptopk_cli::main_with(
        std::env::args_os(),
        &mut io::stdout().lock(),
        &mut io::stderr(),
    );
    std::process::exit(code);
}
