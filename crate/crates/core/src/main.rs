fn main() {
    std::process::exit(hesmc_cli::run());
}

mod hesmc_cli {
    pub fn run() -> i32 {
        eprintln!("cli not wired up yet");
        3
    }
}
