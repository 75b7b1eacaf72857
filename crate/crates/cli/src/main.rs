use clap::error::ErrorKind;
use clap::Parser;
use truthlens_cli::{Cli, CliError};

fn fail(err: &CliError) -> ! {
    eprintln!("{}", err.to_json());
    std::process::exit(err.exit_code());
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            e.exit()
        }
        Err(e) => fail(&CliError::Usage(e.render().to_string().trim().to_owned())),
    };
    if let Err(e) = truthlens_cli::run(&cli) {
        fail(&e);
    }
}
