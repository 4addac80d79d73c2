from hypothesis import settings

# Property tests draw from fixed streams so the suite is reproducible
# run to run, matching the package's determinism guarantees.
settings.register_profile("deterministic", derandomize=True)
settings.load_profile("deterministic")
