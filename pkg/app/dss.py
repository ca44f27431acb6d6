#!/usr/bin/env python

from dss.cli.main import main

if __name__ == "__main__":
    raise SystemExit(main())
