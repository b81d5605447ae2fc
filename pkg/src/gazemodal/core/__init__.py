"""Domain records shared by every gazemodal package."""
