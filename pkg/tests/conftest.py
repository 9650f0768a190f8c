import hypothesis

hypothesis.settings.register_profile(
    "package", deadline=None, max_examples=60, derandomize=True)
hypothesis.settings.load_profile("package")
