from rtscalib.cli import main

raise SystemExit(main())
