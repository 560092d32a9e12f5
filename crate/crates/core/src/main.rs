fn main() -> std::process::ExitCode {
    // Die quietly on a closed pipe like other command-line tools.
    // SAFETY: called before any threads exist.
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    lolac::cli::main_with(std::env::args_os())
}
