fn main() {
    std::process::exit(replica_shadow_cli::run(std::env::args_os()));
}
