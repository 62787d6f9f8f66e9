# neural package initialization
