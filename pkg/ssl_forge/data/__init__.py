# data package initialization
