from breather.main import cli

cli(prog_name="breather")
