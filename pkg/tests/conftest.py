from hypothesis import settings

# property tests draw the same examples on every run
settings.register_profile("repro", derandomize=True, print_blob=True)
settings.load_profile("repro")
