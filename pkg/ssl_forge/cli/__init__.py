# cli package initialization
