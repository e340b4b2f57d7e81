"""tuftwin: error-driven training simulator for tufting-machine work cells.

Subpackages:
  petri      - deterministic colored, time-extended Petri net kernel
  activities - the partitioned three-subnet activity architecture
  analysis   - reachability, deadlock, quasi-liveness and boundedness checks
  twin       - discrete-tick work-cell twin (machine, creel, substrate, product)
  service    - training sessions, scenario files, HTTP/WebSocket API
  cli        - validate / simulate / analyze / serve commands
"""

__version__ = "0.1.0"
