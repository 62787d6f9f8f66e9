# algorithms package initialization
