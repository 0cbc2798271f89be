"""
Exit-code mapping shared by every command blueprint.
"""
