from rs_chain.cli import main

main()
