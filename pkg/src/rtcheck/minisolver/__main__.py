from .frontend import main

raise SystemExit(main())
