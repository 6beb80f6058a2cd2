"""fagan test suite"""
