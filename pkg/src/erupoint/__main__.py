from erupoint.cli import main

main()
