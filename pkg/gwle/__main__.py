from gwle.main import main

main()
