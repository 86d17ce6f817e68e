# Tests package for the DE / Clu-DE benchmark harness
