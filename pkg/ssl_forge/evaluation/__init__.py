# evaluation package initialization
