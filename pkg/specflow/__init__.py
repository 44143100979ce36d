# Spectral multiset package
