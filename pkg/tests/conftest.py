from hypothesis import settings

# compiled kernels pay a one-off JIT/cache-load cost on first call
settings.register_profile("default", deadline=None)
settings.load_profile("default")
