# Subcommand handlers
