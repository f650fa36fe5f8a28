from contextuality.cli import main

main()
