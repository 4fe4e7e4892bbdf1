from eulerdom.cli import main
import sys
sys.exit(main())
