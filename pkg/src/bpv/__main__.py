from bpv.cli import main

main()
