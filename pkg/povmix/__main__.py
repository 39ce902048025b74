from povmix.cli import app

app(prog_name="povmix")
