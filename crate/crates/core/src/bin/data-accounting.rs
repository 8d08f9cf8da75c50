fn main() {
    std::process::exit(data_accounting::cli::main());
}
